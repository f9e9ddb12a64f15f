#include "panacea/cli.hpp"

int main(int argc, char** argv) { return panacea::run_cli(argc, argv); }
