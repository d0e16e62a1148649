#include "routhlab/cli.hpp"

int main(int argc, char** argv) { return routhlab::cli::run(argc, argv); }
