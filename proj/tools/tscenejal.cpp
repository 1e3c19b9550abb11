#include "tscenejal/cli.hpp"

int main(int argc, char** argv) { return tscenejal::cli::run(argc, argv); }
