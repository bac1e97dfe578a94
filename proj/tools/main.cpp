#include "swedge/cli.hpp"

int main(int argc, char** argv) { return swedge::parse_and_dispatch(argc, argv); }
