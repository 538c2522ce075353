#include "commands.hpp"

int main(int argc, char** argv) { return modgrok::cli::run(argc, argv); }
