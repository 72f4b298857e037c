#include "ebsvie/coefficients.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "ebsvie/errors.hpp"

namespace ebsvie {
namespace {

template <typename Family, std::size_t N>
using NameTable = std::array<std::pair<Family, std::string_view>, N>;

constexpr NameTable<DriftFamily, 5> kDriftNames{{{DriftFamily::Zero, "zero"},
                                                 {DriftFamily::Constant, "constant"},
                                                 {DriftFamily::Affine, "affine"},
                                                 {DriftFamily::OrnsteinUhlenbeck, "ou"},
                                                 {DriftFamily::Sine, "sine"}}};

constexpr NameTable<DiffusionFamily, 5> kDiffusionNames{
    {{DiffusionFamily::Zero, "zero"},
     {DiffusionFamily::Constant, "constant"},
     {DiffusionFamily::Geometric, "geometric"},
     {DiffusionFamily::Affine, "affine"},
     {DiffusionFamily::Cosine, "cosine"}}};

constexpr NameTable<GeneratorFamily, 4> kGeneratorNames{
    {{GeneratorFamily::Zero, "zero"},
     {GeneratorFamily::Linear, "linear"},
     {GeneratorFamily::Composite, "composite"},
     {GeneratorFamily::TanhProduct, "tanh_product"}}};

constexpr NameTable<FreeTermFamily, 5> kFreeTermNames{
    {{FreeTermFamily::Constant, "constant"},
     {FreeTermFamily::AffineT, "affine_t"},
     {FreeTermFamily::AffineX, "affine_x"},
     {FreeTermFamily::QuadraticX, "quadratic_x"},
     {FreeTermFamily::SinTTanhX, "sin_t_tanh_x"}}};

constexpr NameTable<ModulusFamily, 1> kModulusNames{{{ModulusFamily::Power, "power"}}};

template <typename Family, std::size_t N>
std::string_view lookup_name(const NameTable<Family, N>& table, Family f) {
    for (const auto& [family, name] : table) {
        if (family == f) return name;
    }
    return "unknown";
}

template <typename Family, std::size_t N>
Family lookup_family(const NameTable<Family, N>& table, std::string_view name,
                     const char* kind) {
    for (const auto& [family, n] : table) {
        if (n == name) return family;
    }
    throw LoadError("model", std::string("unknown ") + kind + " family '" + std::string(name) +
                                 "'");
}

}  // namespace

double Drift::value(double x) const {
    switch (family) {
        case DriftFamily::Zero: return 0.0;
        case DriftFamily::Constant: return params[0];
        case DriftFamily::Affine: return params[0] * x + params[1];
        case DriftFamily::OrnsteinUhlenbeck: return params[0] * (params[1] - x);
        case DriftFamily::Sine: return params[0] * std::sin(x);
    }
    return 0.0;
}

double Drift::derivative(double x) const {
    switch (family) {
        case DriftFamily::Zero:
        case DriftFamily::Constant: return 0.0;
        case DriftFamily::Affine: return params[0];
        case DriftFamily::OrnsteinUhlenbeck: return -params[0];
        case DriftFamily::Sine: return params[0] * std::cos(x);
    }
    return 0.0;
}

double Diffusion::value(double x) const {
    switch (family) {
        case DiffusionFamily::Zero: return 0.0;
        case DiffusionFamily::Constant: return params[0];
        case DiffusionFamily::Geometric: return params[0] * x;
        case DiffusionFamily::Affine: return params[0] + params[1] * x;
        case DiffusionFamily::Cosine: return params[0] + params[1] * std::cos(x);
    }
    return 0.0;
}

double Diffusion::derivative(double x) const {
    switch (family) {
        case DiffusionFamily::Zero:
        case DiffusionFamily::Constant: return 0.0;
        case DiffusionFamily::Geometric: return params[0];
        case DiffusionFamily::Affine: return params[1];
        case DiffusionFamily::Cosine: return -params[1] * std::sin(x);
    }
    return 0.0;
}

double Modulus::operator()(double delta) const {
    return params[0] * std::pow(std::abs(delta), params[1]);
}

std::string_view family_name(DriftFamily f) { return lookup_name(kDriftNames, f); }
std::string_view family_name(DiffusionFamily f) { return lookup_name(kDiffusionNames, f); }
std::string_view family_name(GeneratorFamily f) { return lookup_name(kGeneratorNames, f); }
std::string_view family_name(FreeTermFamily f) { return lookup_name(kFreeTermNames, f); }
std::string_view family_name(ModulusFamily f) { return lookup_name(kModulusNames, f); }

DriftFamily drift_family_from(std::string_view name) {
    return lookup_family(kDriftNames, name, "drift");
}
DiffusionFamily diffusion_family_from(std::string_view name) {
    return lookup_family(kDiffusionNames, name, "diffusion");
}
GeneratorFamily generator_family_from(std::string_view name) {
    return lookup_family(kGeneratorNames, name, "generator");
}
FreeTermFamily free_term_family_from(std::string_view name) {
    return lookup_family(kFreeTermNames, name, "free_term");
}
ModulusFamily modulus_family_from(std::string_view name) {
    return lookup_family(kModulusNames, name, "modulus_rho");
}

std::size_t param_count(DriftFamily f) {
    switch (f) {
        case DriftFamily::Zero: return 0;
        case DriftFamily::Constant: return 1;
        case DriftFamily::Affine: return 2;
        case DriftFamily::OrnsteinUhlenbeck: return 2;
        case DriftFamily::Sine: return 1;
    }
    return 0;
}

std::size_t param_count(DiffusionFamily f) {
    switch (f) {
        case DiffusionFamily::Zero: return 0;
        case DiffusionFamily::Constant: return 1;
        case DiffusionFamily::Geometric: return 1;
        case DiffusionFamily::Affine: return 2;
        case DiffusionFamily::Cosine: return 2;
    }
    return 0;
}

std::size_t param_count(GeneratorFamily f) {
    switch (f) {
        case GeneratorFamily::Zero: return 0;
        case GeneratorFamily::Linear: return 5;
        case GeneratorFamily::Composite: return 3;
        case GeneratorFamily::TanhProduct: return 1;
    }
    return 0;
}

std::size_t param_count(FreeTermFamily f) {
    switch (f) {
        case FreeTermFamily::Constant: return 1;
        case FreeTermFamily::AffineT: return 2;
        case FreeTermFamily::AffineX: return 2;
        case FreeTermFamily::QuadraticX: return 2;
        case FreeTermFamily::SinTTanhX: return 1;
    }
    return 0;
}

std::size_t param_count(ModulusFamily) { return 2; }

}  // namespace ebsvie
