#include "guardcache/harness.hpp"

int main(int argc, char** argv) { return guardcache::cli(argc, argv); }
