#pragma once

#include <gtest/gtest.h>

#include <string>

#include "lcval/error.hpp"

// Runs fn and returns the code of the lcval::Error it throws; records a
// test failure when it throws nothing.
template <typename Fn>
lcval::ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const lcval::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an lcval::Error";
  return lcval::ErrorCode::kIo;
}

template <typename Fn>
std::string message_of(Fn&& fn) {
  try {
    fn();
  } catch (const lcval::Error& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected an lcval::Error";
  return {};
}
