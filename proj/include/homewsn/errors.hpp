// Exception types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace homewsn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// medium
struct AddressSpaceExhausted : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct NoRoute : Error { using Error::Error; };
struct UnknownNode : Error { using Error::Error; };
struct InvalidFrame : Error { using Error::Error; };

// nodes / gateway
struct MissingField : Error { using Error::Error; };
struct GrammarError : Error { using Error::Error; };
struct UnknownRoom : Error { using Error::Error; };
struct UnknownField : Error { using Error::Error; };

// scenario
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

// energy
struct NodeDead : Error { using Error::Error; };

// pipeline
struct ValueOutOfRange : Error { using Error::Error; };
struct MalformedEncoding : Error { using Error::Error; };
struct AuthenticationFailed : Error { using Error::Error; };
struct NonceReuse : Error { using Error::Error; };

// store
struct StoreUnavailable : Error { using Error::Error; };

}  // namespace homewsn
