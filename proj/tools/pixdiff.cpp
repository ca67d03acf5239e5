#include "pixdiff/cli.hpp"

int main(int argc, char** argv) { return pixdiff::cli::main(argc, argv); }
