#include "kknock/cli.hpp"

int main(int argc, char** argv) { return kknock::parse_and_dispatch(argc, argv); }
