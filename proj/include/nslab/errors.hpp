#pragma once

#include <stdexcept>
#include <string>

namespace nslab {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorClass { Validation, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorClass::Validation, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorClass::Numeric, what) {}
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, int line, int column)
        : ValidationError("parse error at " + std::to_string(line) + ":" + std::to_string(column) + ": " +
                          msg),
          line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class UnknownSymbol : public ValidationError {
public:
    explicit UnknownSymbol(const std::string& name) : ValidationError("unknown symbol '" + name + "'") {}
};

class FileNotFound : public ValidationError {
public:
    explicit FileNotFound(const std::string& path) : ValidationError("file not found: " + path) {}
};

class DimensionTooSmall : public ValidationError {
public:
    explicit DimensionTooSmall(const std::string& what) : ValidationError(what) {}
};

class RepresentationMismatch : public ValidationError {
public:
    explicit RepresentationMismatch(const std::string& what) : ValidationError(what) {}
};

class InsufficientSamples : public ValidationError {
public:
    explicit InsufficientSamples(const std::string& what) : ValidationError(what) {}
};

class ZeroNu : public ValidationError {
public:
    ZeroNu() : ValidationError("nu0 must be nonzero") {}
};

class NonConvergence : public NumericError {
public:
    explicit NonConvergence(const std::string& what) : NumericError(what) {}
};

class SingularJacobian : public NumericError {
public:
    explicit SingularJacobian(const std::string& what) : NumericError(what) {}
};

class DegenerateOmega : public NumericError {
public:
    explicit DegenerateOmega(const std::string& what) : NumericError(what) {}
};

class ZeroMomentum : public NumericError {
public:
    explicit ZeroMomentum(const std::string& what) : NumericError(what) {}
};

class RankDeficient : public NumericError {
public:
    explicit RankDeficient(const std::string& what) : NumericError(what) {}
};

class VanishingNu : public NumericError {
public:
    explicit VanishingNu(const std::string& what) : NumericError(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorClass::Validation, what) {}
};

/// Rethrow the exception being handled with `suffix` appended to numeric
/// failure messages; the concrete type is kept. Other exceptions pass through.
[[noreturn]] inline void rethrow_with_suffix(const std::string& suffix) {
    try {
        throw;
    } catch (const DegenerateOmega& e) {
        throw DegenerateOmega(e.what() + suffix);
    } catch (const SingularJacobian& e) {
        throw SingularJacobian(e.what() + suffix);
    } catch (const NonConvergence& e) {
        throw NonConvergence(e.what() + suffix);
    } catch (const ZeroMomentum& e) {
        throw ZeroMomentum(e.what() + suffix);
    } catch (const RankDeficient& e) {
        throw RankDeficient(e.what() + suffix);
    } catch (const VanishingNu& e) {
        throw VanishingNu(e.what() + suffix);
    } catch (const NumericError& e) {
        throw NumericError(e.what() + suffix);
    }
}

} // namespace nslab
