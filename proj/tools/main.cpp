#include "experiment.hpp"

int main(int argc, char** argv) { return asymcoul::cli::main_entry(argc, argv); }
