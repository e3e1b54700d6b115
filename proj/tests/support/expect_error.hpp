#pragma once

#include <gtest/gtest.h>

#include <string>

#include "cx/error.hpp"

// Runs `f` and returns the kind of the cx::Error it throws; fails otherwise.
template <class F>
cx::ErrorKind error_kind_of(F&& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const cx::Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "expected a cx::Error";
  return cx::ErrorKind::InvalidInput;
}
