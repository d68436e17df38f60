#include "trafficfc/cli.hpp"

int main(int argc, char** argv) { return trafficfc::run_cli(argc, argv); }
