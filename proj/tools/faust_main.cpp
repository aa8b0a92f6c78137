#include "cli/commands.hpp"

int main(int argc, char** argv) { return faust::cli::run(argc, argv); }
