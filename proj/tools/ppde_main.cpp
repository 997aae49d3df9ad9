#include "ppde/cli.hpp"

int main(int argc, char** argv) { return ppde::run_cli(argc, argv); }
