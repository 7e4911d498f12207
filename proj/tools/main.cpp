#include "qpsim/cli.hpp"

int main(int argc, char** argv) { return qpsim::cli::run(argc, argv); }
