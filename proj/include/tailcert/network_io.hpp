#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tailcert/error.hpp"
#include "tailcert/io_util.hpp"
#include "tailcert/network.hpp"

namespace tailcert {

inline constexpr int kNetworkFormatVersion = 1;

/// Serializes to {format_version, input_dim, output_dim, layers:[{rows, cols,
/// weights, bias, activation}]}. Doubles are written in shortest round-trip form.
inline nlohmann::json network_to_json(const FeedForwardNetwork& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : net.layers()) {
    layers.push_back({{"rows", layer.weight.rows()},
                      {"cols", layer.weight.cols()},
                      {"weights", std::vector<double>(layer.weight.entries().begin(),
                                                      layer.weight.entries().end())},
                      {"bias", layer.bias},
                      {"activation", std::string(layer.activation.name())}});
  }
  return {{"format_version", kNetworkFormatVersion},
          {"input_dim", net.input_dim()},
          {"output_dim", net.output_dim()},
          {"layers", std::move(layers)}};
}

namespace detail {

inline std::size_t positive_int(const nlohmann::json& j, const std::string& field,
                                std::optional<std::size_t> index) {
  if (!j.contains(field)) throw FormatError(field, index, "missing");
  const auto& v = j.at(field);
  if (!v.is_number_integer() || v.get<long long>() <= 0)
    throw FormatError(field, index, "must be a positive integer");
  return v.get<std::size_t>();
}

inline std::vector<double> real_array(const nlohmann::json& j, const std::string& field,
                                      std::size_t layer) {
  if (!j.contains(field)) throw FormatError(field, layer, "missing");
  const auto& a = j.at(field);
  if (!a.is_array()) throw FormatError(field, layer, "must be an array of reals");
  std::vector<double> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number())
      throw FormatError("layers[" + std::to_string(layer) + "]." + field, i, "not a number");
    const double v = a[i].get<double>();
    if (!std::isfinite(v))
      throw FormatError("layers[" + std::to_string(layer) + "]." + field, i, "non-finite value");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

inline FeedForwardNetwork network_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("<root>", std::nullopt, "expected a JSON object");
  if (!j.contains("format_version") || !j["format_version"].is_number_integer())
    throw FormatError("format_version", std::nullopt, "missing or not an integer");
  if (j["format_version"].get<int>() != kNetworkFormatVersion)
    throw FormatError("format_version", std::nullopt,
                      "unsupported version " + j["format_version"].dump());
  const std::size_t input_dim = detail::positive_int(j, "input_dim", std::nullopt);
  const std::size_t output_dim = detail::positive_int(j, "output_dim", std::nullopt);
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
    throw FormatError("layers", std::nullopt, "must be a non-empty array");

  std::vector<Layer> layers;
  const auto& arr = j["layers"];
  for (std::size_t l = 0; l < arr.size(); ++l) {
    const auto& lj = arr[l];
    if (!lj.is_object()) throw FormatError("layers", l, "layer must be an object");
    const std::size_t rows = detail::positive_int(lj, "rows", l);
    const std::size_t cols = detail::positive_int(lj, "cols", l);
    std::vector<double> w = detail::real_array(lj, "weights", l);
    if (w.size() != rows * cols)
      throw FormatError("layers[" + std::to_string(l) + "].weights", std::nullopt,
                        "length " + std::to_string(w.size()) + " != rows*cols " +
                            std::to_string(rows * cols));
    std::vector<double> b = detail::real_array(lj, "bias", l);
    if (b.size() != rows)
      throw FormatError("layers[" + std::to_string(l) + "].bias", std::nullopt,
                        "length " + std::to_string(b.size()) + " != rows " + std::to_string(rows));
    if (!lj.contains("activation") || !lj["activation"].is_string())
      throw FormatError("activation", l, "missing or not a string");
    Activation act;
    try {
      act = Activation::parse(lj["activation"].get<std::string>());
    } catch (const DomainError& e) {
      throw FormatError("activation", l, e.what());
    }
    if (l == 0 && cols != input_dim)
      throw FormatError("layers[0].cols", std::nullopt, "does not match input_dim");
    if (l > 0 && cols != layers.back().weight.rows())
      throw FormatError("layers[" + std::to_string(l) + "].cols", std::nullopt,
                        "does not match previous layer rows");
    layers.push_back(Layer{Matrix(rows, cols, std::move(w)), std::move(b), act});
  }
  if (layers.back().weight.rows() != output_dim)
    throw FormatError("output_dim", std::nullopt, "does not match last layer rows");
  return FeedForwardNetwork(std::move(layers));
}

inline FeedForwardNetwork load_network(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("<root>", std::nullopt, std::string("invalid JSON: ") + e.what());
  }
  return network_from_json(j);
}

inline void save_network(const FeedForwardNetwork& net, const std::filesystem::path& path) {
  write_file_atomic(path, network_to_json(net).dump(2) + "\n");
}

}  // namespace tailcert
