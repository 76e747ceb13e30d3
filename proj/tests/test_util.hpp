#pragma once

#include <doctest.h>

#include <string>

#include "rems/error.hpp"

#define CHECK_THROWS_KIND(expr, expected_kind)                                                   \
  do {                                                                                           \
    try {                                                                                        \
      (void)(expr);                                                                              \
      FAIL_CHECK("expected " << rems::to_string(expected_kind) << " from " #expr);               \
    } catch (const rems::Error& err_) {                                                          \
      CHECK_MESSAGE(err_.kind() == (expected_kind), "got " << std::string(err_.what()));        \
    }                                                                                            \
  } while (false)
