#include <iostream>

#include "app.hpp"

int main(int argc, char** argv) { return crowdvote::app::dispatch(argc, argv, std::cout, std::cerr); }
