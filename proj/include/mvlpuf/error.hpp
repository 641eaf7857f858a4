// SPDX-License-Identifier: Apache-2.0
/**
 * @file   error.hpp
 * @brief  Exception hierarchy shared by every mvlpuf module.
 *
 * Each error class carries a stable machine-readable code string so the CLI
 * can map failures onto exit statuses without parsing messages.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvlpuf {

class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string &what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string &code() const noexcept { return code_; }

private:
  std::string code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string &what)
      : Error("invalid-argument", what) {}
};

struct InvalidDigit : Error {
  explicit InvalidDigit(const std::string &what)
      : Error("invalid-digit", what) {}
};

struct InvalidPrediction : Error {
  explicit InvalidPrediction(const std::string &what)
      : Error("invalid-prediction", what) {}
};

struct DivergentSeries : Error {
  explicit DivergentSeries(const std::string &what)
      : Error("divergent-series", what) {}
};

struct InvalidState : Error {
  explicit InvalidState(const std::string &what)
      : Error("invalid-state", what) {}
};

struct ExhaustedDomain : Error {
  explicit ExhaustedDomain(const std::string &what)
      : Error("exhausted-domain", what) {}
};

struct IoError : Error {
  explicit IoError(const std::string &what) : Error("io-error", what) {}
};

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string &what)
      : Error("parse-error", "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class DivergenceError : public Error {
public:
  DivergenceError(std::size_t step, const std::string &what)
      : Error("divergence-error",
              "step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

} // namespace mvlpuf
