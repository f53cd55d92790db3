#include "poscorr/cli.hpp"

int main(int argc, char** argv) { return poscorr::run_cli(argc, argv); }
