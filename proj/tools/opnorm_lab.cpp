#include "opnorm/cli.hpp"

int main(int argc, char** argv) { return opnorm::cli::dispatch(argc, argv); }
