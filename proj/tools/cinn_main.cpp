#include "cinn/cli.hpp"

int main(int argc, char** argv) { return cinn::cli_run(argc, argv); }
