#include "fusso/cli.hpp"

int main(int argc, char** argv) { return fusso::run_cli(argc, argv); }
