#ifndef NOISECOND_ERROR_HPP
#define NOISECOND_ERROR_HPP

#include <stdexcept>
#include <string>

namespace nc {

enum class ErrorCode {
  InputTooShort,
  ShapeError,
  UnsupportedFormat,
  DuplicateId,
  DegenerateSignal,
  DegenerateBatch,
  SplitViolation,
  EmptyCorpus,
  ContractViolation,
  ConfigMismatch,
  CorruptCheckpoint,
  RefusingOverwrite,
  NumericFailure,
  IoError,
  UsageError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

#define NC_DEFINE_ERROR(Name)                              \
  class Name : public Error {                              \
   public:                                                 \
    explicit Name(const std::string& msg)                  \
        : Error(ErrorCode::Name, std::string(#Name ": ") + msg) {} \
  }

NC_DEFINE_ERROR(InputTooShort);
NC_DEFINE_ERROR(ShapeError);
NC_DEFINE_ERROR(UnsupportedFormat);
NC_DEFINE_ERROR(DuplicateId);
NC_DEFINE_ERROR(DegenerateSignal);
NC_DEFINE_ERROR(DegenerateBatch);
NC_DEFINE_ERROR(SplitViolation);
NC_DEFINE_ERROR(EmptyCorpus);
NC_DEFINE_ERROR(ContractViolation);
NC_DEFINE_ERROR(ConfigMismatch);
NC_DEFINE_ERROR(CorruptCheckpoint);
NC_DEFINE_ERROR(RefusingOverwrite);
NC_DEFINE_ERROR(NumericFailure);
NC_DEFINE_ERROR(IoError);
NC_DEFINE_ERROR(UsageError);

#undef NC_DEFINE_ERROR

}  // namespace nc

#endif
