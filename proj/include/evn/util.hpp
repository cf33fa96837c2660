#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace evn {

std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_ws(std::string_view s);
std::string_view trim(std::string_view s);
std::string lower_ascii(std::string_view s);

bool parse_i64(std::string_view s, std::int64_t& out);
bool parse_u64(std::string_view s, std::uint64_t& out);
bool parse_f64(std::string_view s, double& out);

// Shortest decimal form that parses back to the same double.
std::string format_f64(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view data);
bool file_exists(const std::string& path);

std::uint64_t fnv1a64(std::string_view data);

// Percentages are reported at two decimals, rounded half up.
double round_half_up2(double v);
std::string format_pct(double fraction);

// Little-endian binary packing used by model files.
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f64(std::string& out, double v);
bool get_u32(std::string_view data, std::size_t& pos, std::uint32_t& v);
bool get_u64(std::string_view data, std::size_t& pos, std::uint64_t& v);
bool get_f64(std::string_view data, std::size_t& pos, double& v);

// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must not throw
// across tasks it does not own; exceptions are rethrown on the caller.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace evn
