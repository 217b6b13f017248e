#include "edge/cli.hpp"

int main(int argc, char** argv) { return edge::cli::run(argc, argv); }
