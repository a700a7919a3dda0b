#pragma once

#include <stdexcept>
#include <string>

namespace define {

// Base for every recoverable error raised by the library. The CLI maps these
// to exit code 1; anything else escaping is treated as an internal failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DEFINE_ERROR_TYPE(Name)        \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

// schema
DEFINE_ERROR_TYPE(UnknownGrade);
DEFINE_ERROR_TYPE(ArityMismatch);
DEFINE_ERROR_TYPE(SchemaMismatch);
DEFINE_ERROR_TYPE(ValidationError);

// ingest
DEFINE_ERROR_TYPE(ParseError);
DEFINE_ERROR_TYPE(SchemaViolation);
DEFINE_ERROR_TYPE(NonPositivePrice);
DEFINE_ERROR_TYPE(DuplicateDate);
DEFINE_ERROR_TYPE(IOError);

// labeler
DEFINE_ERROR_TYPE(InsufficientHistory);

// extractor
DEFINE_ERROR_TYPE(EmptySeries);
DEFINE_ERROR_TYPE(TemplateError);
DEFINE_ERROR_TYPE(MalformedJSON);
DEFINE_ERROR_TYPE(MissingFactor);
DEFINE_ERROR_TYPE(MissingOutcome);
DEFINE_ERROR_TYPE(FixtureMissing);
DEFINE_ERROR_TYPE(ConfigError);

// btmodel
DEFINE_ERROR_TYPE(MissingProfile);
DEFINE_ERROR_TYPE(DegenerateMatrix);

// decide
DEFINE_ERROR_TYPE(CountMismatch);
DEFINE_ERROR_TYPE(NonMonotoneCutpoints);

// analogy
DEFINE_ERROR_TYPE(EmptyCorpus);
DEFINE_ERROR_TYPE(MalformedResponse);
DEFINE_ERROR_TYPE(IdxOutOfRange);
DEFINE_ERROR_TYPE(UnknownAction);

// evalx
DEFINE_ERROR_TYPE(IdMismatch);

DEFINE_ERROR_TYPE(PreconditionError);

#undef DEFINE_ERROR_TYPE

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts, int status = 0)
      : Error(what + " (after " + std::to_string(attempts) + " attempt" +
              (attempts == 1 ? "" : "s") + ")"),
        attempts_(attempts),
        status_(status) {}

  int attempts() const { return attempts_; }
  // HTTP status of the last attempt, 0 when no response was received.
  int status() const { return status_; }

 private:
  int attempts_;
  int status_;
};

}  // namespace define
