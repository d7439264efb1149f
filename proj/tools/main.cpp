#include "nlpde/cli.hpp"

int main(int argc, char** argv) { return nlpde::cli_run(argc, argv); }
