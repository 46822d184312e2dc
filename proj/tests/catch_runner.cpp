// Builds the amalgamated Catch2 distribution (framework + default main)
// into a static library shared by the unit test binary.
#include <catch2/catch_amalgamated.cpp>
