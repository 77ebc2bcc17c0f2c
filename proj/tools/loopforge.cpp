#include "loopforge/cli.hpp"

int main(int argc, char** argv) { return loopforge::run(argc, argv); }
