#include "ouq/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ouq/errors.hpp"

namespace ouq {

using nlohmann::json;

std::string format_real(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

json encode_real(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double decode_real(const json& j)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw std::invalid_argument("expected a real number, got " + j.dump());
}

namespace {

json encode_reals(std::span<const double> xs)
{
    json out = json::array();
    for (double x : xs) out.push_back(encode_real(x));
    return out;
}

std::vector<double> decode_reals(const json& j)
{
    std::vector<double> out;
    for (const auto& x : j) out.push_back(decode_real(x));
    return out;
}

} // namespace

json to_json(const ProductMeasure& pm)
{
    json components = json::array();
    for (const auto& m : pm.components())
        components.push_back({{"weights", encode_reals(m.weights())}, {"positions", encode_reals(m.positions())}});
    return {{"components", components}};
}

ProductMeasure product_measure_from_json(const json& j)
{
    std::vector<DiscreteMeasure> components;
    for (const auto& c : j.at("components"))
        components.emplace_back(decode_reals(c.at("weights")), decode_reals(c.at("positions")));
    return ProductMeasure(std::move(components));
}

json to_json(const DeCheckpoint& c)
{
    json population = json::array();
    for (const auto& member : c.population) population.push_back(encode_reals(member));
    return {{"population", population},
            {"fitness", encode_reals(c.fitness)},
            {"best_x", encode_reals(c.best_x)},
            {"best_f", encode_real(c.best_f)},
            {"best_history", encode_reals(c.best_history)},
            {"generation", c.generation},
            {"evals", c.evals},
            {"seed", c.seed},
            {"rng_state", c.rng_state}};
}

DeCheckpoint checkpoint_from_json(const json& j)
{
    DeCheckpoint c;
    for (const auto& member : j.at("population")) c.population.push_back(decode_reals(member));
    c.fitness = decode_reals(j.at("fitness"));
    c.best_x = decode_reals(j.at("best_x"));
    c.best_f = decode_real(j.at("best_f"));
    c.best_history = decode_reals(j.at("best_history"));
    c.generation = j.at("generation").get<std::size_t>();
    c.evals = j.at("evals").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.rng_state = j.at("rng_state").get<std::string>();
    if (c.fitness.size() != c.population.size())
        throw LengthMismatch("checkpoint: fitness and population differ in length");
    return c;
}

void write_json_file(const json& j, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path);
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

void save_checkpoint(const DeCheckpoint& checkpoint, const std::string& path)
{
    write_json_file(to_json(checkpoint), path);
}

DeCheckpoint load_checkpoint(const std::string& path)
{
    return checkpoint_from_json(read_json_file(path));
}

} // namespace ouq
