#include "repnum/cli.hpp"

int main(int argc, char** argv) { return repnum::cli::run(argc, argv); }
