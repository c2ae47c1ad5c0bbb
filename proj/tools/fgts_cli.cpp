#include "fgts/cli.hpp"

int main(int argc, char** argv) { return fgts::cli_main(argc, argv); }
