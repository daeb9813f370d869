#include "menucsi/cli.hpp"

int main(int argc, char** argv) { return menucsi::cli::run(argc, argv); }
