#include "gsagcn/cli.hpp"

int main(int argc, char** argv) { return gsagcn::cli::run(argc, argv); }
