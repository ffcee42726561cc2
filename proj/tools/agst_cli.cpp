#include "agst/cli.hpp"

int main(int argc, char** argv) { return agst::cli_main(argc, argv); }
