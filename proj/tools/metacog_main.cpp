#include "metacog/cli.hpp"

int main(int argc, char** argv) { return metacog::run_cli(argc, argv); }
