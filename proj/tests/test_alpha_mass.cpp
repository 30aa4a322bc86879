#include <gtest/gtest.h>

#include "densreg/densreg.hpp"

TEST(Placeholder, Builds) { SUCCEED(); }
