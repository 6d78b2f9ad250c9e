#include "vpb/cli.hpp"

int main(int argc, char** argv) { return vpb::cli::main(argc, argv); }
