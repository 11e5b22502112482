#include "vqla/cli.hpp"

int main(int argc, char** argv) { return vqla::dispatch(argc, argv); }
