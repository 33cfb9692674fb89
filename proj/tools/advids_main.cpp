#include "advids/cli.hpp"

int main(int argc, char** argv) { return advids::cli::dispatch(argc, argv); }
