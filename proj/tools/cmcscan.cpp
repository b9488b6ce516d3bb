#include "cmcs/cli.hpp"

int main(int argc, char** argv) { return cmcs::run_cli(argc, argv); }
