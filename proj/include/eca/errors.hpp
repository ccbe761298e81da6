#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace eca {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// corpus
class ParseError : public Error { public: using Error::Error; };
class SchemaError : public Error { public: using Error::Error; };
class DanglingRefError : public Error { public: using Error::Error; };
class MissingGoldError : public Error { public: using Error::Error; };

// windowing
class RangeError : public Error { public: using Error::Error; };

// retrieval
class CoverageError : public Error { public: using Error::Error; };
class DimensionError : public Error { public: using Error::Error; };
class EmptyIndexError : public Error { public: using Error::Error; };
class EmbedderError : public Error { public: using Error::Error; };

// prompting
class PlaceholderError : public Error { public: using Error::Error; };
class MissingDemonstrationError : public Error { public: using Error::Error; };
class NeutralTargetError : public Error { public: using Error::Error; };
class NoLabelError : public Error { public: using Error::Error; };
class UnparseableError : public Error { public: using Error::Error; };

// llm gateway
class TransportError : public Error { public: using Error::Error; };

class RateLimitError : public Error {
public:
    RateLimitError(const std::string& what, long retry_after_ms)
        : Error(what), retry_after_ms(retry_after_ms) {}
    long retry_after_ms = 0;
};

class ReplayMissError : public Error { public: using Error::Error; };

class BackendError : public Error {
public:
    BackendError(const std::string& what, int status, std::string body)
        : Error(what), status(status), body(std::move(body)) {}
    int status = 0;
    std::string body;
};

class RetriesExhaustedError : public Error {
public:
    RetriesExhaustedError(const std::string& what, std::vector<std::string> attempts)
        : Error(what), attempts(std::move(attempts)) {}
    // raw response text or error message of each failed attempt, in order
    std::vector<std::string> attempts;
};

// vision montage
class DimensionMismatchError : public Error { public: using Error::Error; };
class VideoDecodeError : public Error { public: using Error::Error; };

// evaluation
class ConversationMismatchError : public Error { public: using Error::Error; };
class KeyMismatchError : public Error { public: using Error::Error; };

// io / cli
class IoError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

}  // namespace eca
