#include "netpulse/cli.hpp"

int main(int argc, char** argv) { return netpulse::run_cli(argc, argv); }
