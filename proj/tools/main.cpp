#include "lstsc_cli.hpp"

int main(int argc, char** argv) { return lstsc::cli::run(argc, argv); }
