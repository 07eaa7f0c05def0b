#include <iostream>

#include "criteria.hpp"

int main() { return mising::verify::run_all(std::cout) ? 0 : 1; }
