#include "rml/cli.hpp"

int main(int argc, char** argv) { return rml::cli::cli_main(argc, argv); }
