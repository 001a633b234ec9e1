#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace doclayout {

// Base for every failure the toolkit reports to callers.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownClass : public Error {
 public:
  explicit UnknownClass(std::string name)
      : Error("unknown class '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& why)
      : Error("line " + std::to_string(line_no) + ": " + why), line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class OutOfRange : public Error {
 public:
  OutOfRange(std::size_t line_no, const std::string& why)
      : Error("line " + std::to_string(line_no) + ": value out of range: " + why),
        line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

// Structural problem in JSON input. `path` is a JSON-pointer-like location
// such as "$[2].annotations[0].result[1].value.x"; `line_no` is 0 when the
// input is not line oriented.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& why, std::size_t line_no = 0)
      : Error((line_no ? "line " + std::to_string(line_no) + ": " : std::string()) +
              path + ": " + why),
        path_(std::move(path)),
        line_no_(line_no) {}
  const std::string& path() const { return path_; }
  std::size_t line_no() const { return line_no_; }

 private:
  std::string path_;
  std::size_t line_no_;
};

class DuplicatePage : public Error {
 public:
  explicit DuplicatePage(std::string page_id)
      : Error("duplicate page_id '" + page_id + "'"), page_id_(std::move(page_id)) {}
  const std::string& page_id() const { return page_id_; }

 private:
  std::string page_id_;
};

class PageMismatch : public Error {
 public:
  explicit PageMismatch(const std::string& page_id)
      : Error("detections reference page '" + page_id + "' absent from ground truth") {}
};

class NoGroundTruth : public Error {
 public:
  NoGroundTruth() : Error("dataset contains no ground-truth annotations") {}
};

}  // namespace doclayout

namespace doclayout {

// Failure of an external backend or detector process.
class BackendError : public Error {
 public:
  enum class Kind { kTimeout, kCrash, kMalformedOutput };
  BackendError(Kind kind, const std::string& what, int exit_code = -1)
      : Error(what), kind_(kind), exit_code_(exit_code) {}
  Kind kind() const { return kind_; }
  int exit_code() const { return exit_code_; }

 private:
  Kind kind_;
  int exit_code_;
};

}  // namespace doclayout
