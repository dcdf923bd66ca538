#pragma once

#include "doctest.h"
#include "sonflow/error.hpp"

// Expects expr to throw sonflow::Error carrying the given code.
#define CHECK_ERROR_CODE(expr, expected)                         \
  do {                                                           \
    bool thrown_ = false;                                        \
    try {                                                        \
      (void)(expr);                                              \
    } catch (const sonflow::Error& e_) {                         \
      thrown_ = true;                                            \
      CHECK(e_.code() == (expected));                            \
    }                                                            \
    CHECK_MESSAGE(thrown_, "expected sonflow::Error from " #expr); \
  } while (0)
