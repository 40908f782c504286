#include "dtg/cli.hpp"

int main(int argc, char** argv) { return dtg::run_cli(argc, argv); }
