#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "cartqubo/dataset.hpp"
#include "cartqubo/error.hpp"
#include "cartqubo/rng.hpp"

namespace cartqubo {

namespace {

struct BrandParams {
  const char* name;
  double base;
  double sigma;
};

// Alphabetical, so category codes line up with the usual reporting order.
constexpr std::array<BrandParams, 10> kBrands{{
    {"Audi", 40000.0, 0.6},
    {"BMW", 45000.0, 0.6},
    {"Ford", 18000.0, 0.4},
    {"Honda", 16000.0, 0.4},
    {"Hyundai", 14000.0, 0.4},
    {"Kia", 13000.0, 0.4},
    {"Mercedes", 50000.0, 0.6},
    {"Nissan", 15000.0, 0.4},
    {"Toyota", 17000.0, 0.4},
    {"Volkswagen", 20000.0, 0.4},
}};

struct ColorParams {
  const char* name;
  double factor;
};

constexpr std::array<ColorParams, 6> kColors{{
    {"Black", 1.0},
    {"Blue", 1.0},
    {"Gray", 0.95},
    {"Green", 0.95},
    {"Red", 1.15},
    {"White", 1.10},
}};

bool is_luxury(std::size_t brand) {
  const std::string_view name = kBrands[brand].name;
  return name == "BMW" || name == "Audi" || name == "Mercedes";
}

struct Columns {
  std::vector<std::int32_t> brand, color;
  std::vector<double> mileage, has_claim, amount;

  explicit Columns(std::size_t n) {
    brand.reserve(n);
    color.reserve(n);
    mileage.reserve(n);
    has_claim.reserve(n);
    amount.reserve(n);
  }

  Dataset finish() && {
    ColumnSchema brand_schema{"Brand", ColumnKind::categorical, {}};
    for (const auto& b : kBrands) brand_schema.categories.emplace_back(b.name);
    ColumnSchema color_schema{"Color", ColumnKind::categorical, {}};
    for (const auto& c : kColors) color_schema.categories.emplace_back(c.name);
    std::vector<Column> cols;
    cols.push_back(Column{std::move(brand_schema), {}, std::move(brand)});
    cols.push_back(Column{std::move(color_schema), {}, std::move(color)});
    cols.push_back(Column{{"Mileage_km", ColumnKind::numeric, {}}, std::move(mileage), {}});
    cols.push_back(Column{{"HasClaim", ColumnKind::binary, {}}, std::move(has_claim), {}});
    return Dataset(std::move(cols), "ClaimAmount", std::move(amount));
  }
};

}  // namespace

Dataset generate_df(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("generate_df: n must be at least 1");
  Rng rng(seed);
  Columns out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = static_cast<std::size_t>(rng.below(kBrands.size()));
    const double base = kBrands[b].base;
    const double mileage = std::min(rng.gamma(2.0, 30000.0), 250000.0);
    const auto c = static_cast<std::size_t>(rng.below(kColors.size()));
    const double factor = kColors[c].factor;
    const double p = 1.0 / (1.0 + std::exp(-(mileage - 80000.0) / 20000.0));
    const bool claim = rng.bernoulli(p);
    double amount = 0.0;
    if (claim) {
      const double severity = 0.15 * base + 0.002 * mileage + (is_luxury(b) ? 5000.0 : 0.0) +
                              (std::string_view(kColors[c].name) == "Red" ? 3000.0 : 0.0);
      const double noise = rng.normal(0.0, 2000.0);
      amount = std::max(100.0, severity * factor + noise);
    }
    out.brand.push_back(static_cast<std::int32_t>(b));
    out.color.push_back(static_cast<std::int32_t>(c));
    out.mileage.push_back(mileage);
    out.has_claim.push_back(claim ? 1.0 : 0.0);
    out.amount.push_back(amount);
  }
  return std::move(out).finish();
}

Dataset generate_datagen(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("generate_datagen: n must be at least 1");
  Rng rng(seed);
  Columns out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = static_cast<std::size_t>(rng.below(kBrands.size()));
    const double base = kBrands[b].base;
    const double sigma = kBrands[b].sigma;
    const double mileage = std::min(rng.lognormal(10.0, 0.5), 300000.0);
    const auto c = static_cast<std::size_t>(rng.below(kColors.size()));
    const double factor = kColors[c].factor;
    const double p = std::min(std::max(0.15 + 0.000002 * mileage, 0.01), 0.9);
    const bool claim = rng.bernoulli(p);
    double amount = 0.0;
    if (claim) {
      const double basic = rng.lognormal(std::log(0.1 * base), sigma);
      const double km = 0.001 * mileage * rng.uniform(0.5, 1.5);
      const double tail = rng.bernoulli(0.02) ? rng.lognormal(std::log(base), 1.0) : 0.0;
      amount = std::max(50.0, (basic + km + tail) * factor);
    }
    out.brand.push_back(static_cast<std::int32_t>(b));
    out.color.push_back(static_cast<std::int32_t>(c));
    out.mileage.push_back(mileage);
    out.has_claim.push_back(claim ? 1.0 : 0.0);
    out.amount.push_back(amount);
  }
  return std::move(out).finish();
}

}  // namespace cartqubo
