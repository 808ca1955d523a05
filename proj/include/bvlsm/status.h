#ifndef BVLSM_STATUS_H
#define BVLSM_STATUS_H

#include <string>
#include <string_view>
#include <utility>

namespace bvlsm {

// Operation result carried by value. Cheap to copy in the OK case.
class Status {
 public:
  Status() = default;

  static Status OK() { return Status(); }
  static Status NotFound(std::string_view msg = {}) {
    return Status(Code::kNotFound, msg);
  }
  static Status Corruption(std::string_view msg = {}) {
    return Status(Code::kCorruption, msg);
  }
  static Status IOError(std::string_view msg = {}) {
    return Status(Code::kIOError, msg);
  }
  static Status InvalidArgument(std::string_view msg = {}) {
    return Status(Code::kInvalidArgument, msg);
  }
  static Status Closed(std::string_view msg = {}) {
    return Status(Code::kClosed, msg);
  }
  static Status Busy(std::string_view msg = {}) {
    return Status(Code::kBusy, msg);
  }
  static Status TooLarge(std::string_view msg = {}) {
    return Status(Code::kTooLarge, msg);
  }

  bool ok() const { return code_ == Code::kOk; }
  bool IsNotFound() const { return code_ == Code::kNotFound; }
  bool IsCorruption() const { return code_ == Code::kCorruption; }
  bool IsIOError() const { return code_ == Code::kIOError; }
  bool IsInvalidArgument() const { return code_ == Code::kInvalidArgument; }
  bool IsClosed() const { return code_ == Code::kClosed; }
  bool IsBusy() const { return code_ == Code::kBusy; }
  bool IsTooLarge() const { return code_ == Code::kTooLarge; }

  std::string ToString() const {
    switch (code_) {
      case Code::kOk:
        return "OK";
      case Code::kNotFound:
        return "NotFound: " + msg_;
      case Code::kCorruption:
        return "Corruption: " + msg_;
      case Code::kIOError:
        return "IOError: " + msg_;
      case Code::kInvalidArgument:
        return "InvalidArgument: " + msg_;
      case Code::kClosed:
        return "Closed: " + msg_;
      case Code::kBusy:
        return "Busy: " + msg_;
      case Code::kTooLarge:
        return "TooLarge: " + msg_;
    }
    return "Unknown";
  }

  const std::string& message() const { return msg_; }

 private:
  enum class Code {
    kOk = 0,
    kNotFound,
    kCorruption,
    kIOError,
    kInvalidArgument,
    kClosed,
    kBusy,
    kTooLarge,
  };

  Status(Code code, std::string_view msg) : code_(code), msg_(msg) {}

  Code code_ = Code::kOk;
  std::string msg_;
};

}  // namespace bvlsm

#endif  // BVLSM_STATUS_H
