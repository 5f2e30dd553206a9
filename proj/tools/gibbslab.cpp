#include "gibbslab/cli.hpp"

int main(int argc, char** argv) { return gibbslab::cli::run(argc, argv); }
