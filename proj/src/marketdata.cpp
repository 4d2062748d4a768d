#include "drltrade/marketdata.hpp"

#include "drltrade/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace drltrade {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string r(s);
    std::transform(r.begin(), r.end(), r.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return r;
}

double parse_price(std::string_view cell, std::size_t line_no) {
    double v = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw io_error("line " + std::to_string(line_no) + ": unparsable price '" + std::string(cell) + "'");
    }
    if (!std::isfinite(v) || v <= 0.0) {
        throw io_error("line " + std::to_string(line_no) + ": non-positive price " + std::string(cell));
    }
    return v;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

using QuoteTable = std::map<Date, std::map<std::string, double>>;

LoadedPrices align(const QuoteTable& quotes, std::vector<std::string> all_tickers,
                   const std::optional<std::vector<std::string>>& universe) {
    std::vector<std::string> tickers = universe ? *universe : std::move(all_tickers);
    if (tickers.empty()) throw io_error("price table has no tickers");
    if (universe) {
        for (const auto& t : tickers) {
            const bool present = std::any_of(quotes.begin(), quotes.end(),
                                             [&](const auto& row) { return row.second.count(t) > 0; });
            if (!present) throw config_error("ticker '" + t + "' not present in price data");
        }
    }

    LoadedPrices out;
    std::vector<std::vector<double>> rows;
    for (const auto& [date, row] : quotes) {
        std::vector<double> values;
        values.reserve(tickers.size());
        for (const auto& t : tickers) {
            const auto it = row.find(t);
            if (it == row.end()) break;
            values.push_back(it->second);
        }
        if (values.size() != tickers.size()) {
            ++out.dropped_dates;
            continue;
        }
        out.series.dates.push_back(date);
        rows.push_back(std::move(values));
    }
    if (rows.size() < 2) throw io_error("fewer than 2 dates survive alignment");

    out.series.tickers = std::move(tickers);
    out.series.prices.resize(static_cast<Eigen::Index>(rows.size()),
                             static_cast<Eigen::Index>(out.series.tickers.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            out.series.prices(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return out;
}

}  // namespace

Date parse_date(std::string_view text) {
    text = trim(text);
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    const auto bad = [&] { return io_error("malformed date '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    const auto parse_part = [&](std::size_t pos, std::size_t len, auto& value) {
        const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
        if (ec != std::errc{} || ptr != text.data() + pos + len) throw bad();
    };
    parse_part(0, 4, y);
    parse_part(5, 2, m);
    parse_part(8, 2, d);
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) throw bad();
    return date;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

void PriceSeries::validate() const {
    if (static_cast<std::size_t>(prices.rows()) != dates.size() ||
        static_cast<std::size_t>(prices.cols()) != tickers.size()) {
        throw config_error("price matrix shape does not match dates x tickers");
    }
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) throw config_error("dates not strictly increasing at " + format_date(dates[i]));
    }
    if (!prices.allFinite() || (prices.size() > 0 && prices.minCoeff() <= 0.0)) {
        throw config_error("prices must be strictly positive and finite");
    }
}

PriceSeries PriceSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > dates.size()) throw config_error("slice out of range");
    PriceSeries out;
    out.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(first),
                     dates.begin() + static_cast<std::ptrdiff_t>(first + count));
    out.tickers = tickers;
    out.prices = prices.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    return out;
}

PriceSeries concat(const PriceSeries& a, const PriceSeries& b) {
    if (a.tickers != b.tickers) throw config_error("cannot concatenate series with different tickers");
    if (!a.dates.empty() && !b.dates.empty() && !(a.dates.back() < b.dates.front())) {
        throw config_error("concatenated series overlap");
    }
    PriceSeries out;
    out.tickers = a.tickers;
    out.dates = a.dates;
    out.dates.insert(out.dates.end(), b.dates.begin(), b.dates.end());
    out.prices.resize(a.prices.rows() + b.prices.rows(), static_cast<Eigen::Index>(a.tickers.size()));
    out.prices << a.prices, b.prices;
    return out;
}

LoadedPrices parse_price_table(std::string_view text, const std::optional<std::vector<std::string>>& universe) {
    std::vector<std::string_view> lines;
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            auto nl = text.find('\n', start);
            if (nl == std::string_view::npos) nl = text.size();
            lines.push_back(text.substr(start, nl - start));
            start = nl + 1;
        }
    }
    std::size_t header_idx = 0;
    while (header_idx < lines.size() && trim(lines[header_idx]).empty()) ++header_idx;
    if (header_idx == lines.size()) throw io_error("price table is empty");

    const auto header = split_csv_line(lines[header_idx]);
    if (header.empty() || lower(header[0]) != "date") throw io_error("price table header must start with 'date'");

    const bool long_format =
        header.size() == 3 && lower(header[1]) == "ticker" && (lower(header[2]) == "close" || lower(header[2]) == "price");

    QuoteTable quotes;
    std::vector<std::string> tickers;
    if (!long_format) {
        if (header.size() < 2) throw io_error("wide price table needs at least one ticker column");
        for (std::size_t c = 1; c < header.size(); ++c) {
            if (header[c].empty()) throw io_error("empty ticker name in header");
            if (std::find(tickers.begin(), tickers.end(), header[c]) != tickers.end()) {
                throw io_error("duplicate ticker column '" + std::string(header[c]) + "'");
            }
            tickers.emplace_back(header[c]);
        }
    }

    for (std::size_t i = header_idx + 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cells = split_csv_line(lines[i]);
        const std::size_t line_no = i + 1;
        const Date date = parse_date(cells[0]);
        if (long_format) {
            if (cells.size() != 3) throw io_error("line " + std::to_string(line_no) + ": expected 3 fields");
            const std::string ticker(cells[1]);
            if (ticker.empty()) throw io_error("line " + std::to_string(line_no) + ": empty ticker");
            auto& row = quotes[date];
            if (row.count(ticker)) {
                throw io_error("line " + std::to_string(line_no) + ": duplicate quote for " + ticker);
            }
            row[ticker] = parse_price(cells[2], line_no);
            if (std::find(tickers.begin(), tickers.end(), ticker) == tickers.end()) tickers.push_back(ticker);
        } else {
            if (cells.size() != header.size()) {
                throw io_error("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                               " fields");
            }
            if (quotes.count(date)) throw io_error("line " + std::to_string(line_no) + ": duplicate date");
            auto& row = quotes[date];
            for (std::size_t c = 1; c < cells.size(); ++c) {
                if (cells[c].empty()) continue;  // missing quote
                row[tickers[c - 1]] = parse_price(cells[c], line_no);
            }
        }
    }
    return align(quotes, std::move(tickers), universe);
}

LoadedPrices load_price_table(const std::filesystem::path& path,
                              const std::optional<std::vector<std::string>>& universe) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open price file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_price_table(buf.str(), universe);
}

std::string to_wide_csv(const PriceSeries& series) {
    std::string out = "date";
    for (const auto& t : series.tickers) out += "," + t;
    out += "\n";
    for (std::size_t i = 0; i < series.dates.size(); ++i) {
        out += format_date(series.dates[i]);
        for (Eigen::Index j = 0; j < series.prices.cols(); ++j) {
            out += ",";
            out += format_double(series.prices(static_cast<Eigen::Index>(i), j));
        }
        out += "\n";
    }
    return out;
}

void write_wide_csv(const std::filesystem::path& path, const PriceSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << to_wide_csv(series);
    if (!out) throw io_error("write failed for " + path.string());
}

PeriodSplit split_periods(const PriceSeries& series, const Date& train_end, const Date& validation_end) {
    if (!(train_end < validation_end)) throw config_error("train_end must precede validation_end");
    if (series.dates.empty()) throw config_error("cannot split an empty series");
    const auto in_range = [&](const Date& d) { return !(d < series.dates.front()) && !(series.dates.back() < d); };
    if (!in_range(train_end) || !in_range(validation_end)) {
        throw config_error("split boundary outside series range " + format_date(series.dates.front()) + ".." +
                           format_date(series.dates.back()));
    }
    // Boundary dates belong to the earlier period.
    const auto upper = [&](const Date& d) {
        return static_cast<std::size_t>(std::upper_bound(series.dates.begin(), series.dates.end(), d) -
                                        series.dates.begin());
    };
    const std::size_t n_train = upper(train_end);
    const std::size_t n_valid = upper(validation_end) - n_train;
    const std::size_t n_trade = series.dates.size() - n_train - n_valid;
    if (n_train < 2 || n_valid < 2 || n_trade < 2) {
        throw config_error("split leaves a period with fewer than 2 dates (" + std::to_string(n_train) + "/" +
                           std::to_string(n_valid) + "/" + std::to_string(n_trade) + ")");
    }
    return {series.slice(0, n_train), series.slice(n_train, n_valid), series.slice(n_train + n_valid, n_trade)};
}

PriceSeries synthetic_series(const GeneratorSpec& spec) {
    const std::size_t n = spec.initial_price.size();
    if (spec.days < 2) throw config_error("synthetic series needs at least 2 days");
    if (n == 0) throw config_error("synthetic series needs at least 1 ticker");
    if (spec.drift.size() != n) throw config_error("drift must have one entry per ticker");
    if (spec.kind == GeneratorKind::RandomWalk && spec.volatility.size() != n) {
        throw config_error("volatility must have one entry per ticker");
    }
    if (!spec.names.empty() && spec.names.size() != n) throw config_error("names must have one entry per ticker");
    for (std::size_t d = 0; d < n; ++d) {
        if (!(spec.initial_price[d] > 0.0) || !std::isfinite(spec.initial_price[d])) {
            throw config_error("initial price must be positive");
        }
        if (!(spec.drift[d] > -1.0)) throw config_error("drift must exceed -1");
        if (spec.kind == GeneratorKind::RandomWalk && !(spec.volatility[d] >= 0.0)) {
            throw config_error("volatility must be non-negative");
        }
    }

    PriceSeries out;
    for (std::size_t d = 0; d < n; ++d) out.tickers.push_back(spec.names.empty() ? "S" + std::to_string(d + 1) : spec.names[d]);

    std::chrono::sys_days day{spec.start};
    for (std::size_t t = 0; t < spec.days; ++t) {
        while (std::chrono::weekday{day} == std::chrono::Saturday || std::chrono::weekday{day} == std::chrono::Sunday) {
            day += std::chrono::days{1};
        }
        out.dates.emplace_back(day);
        day += std::chrono::days{1};
    }

    const auto rows = static_cast<Eigen::Index>(spec.days);
    out.prices.resize(rows, static_cast<Eigen::Index>(n));
    if (spec.kind == GeneratorKind::Trend) {
        for (Eigen::Index t = 0; t < rows; ++t)
            for (std::size_t d = 0; d < n; ++d)
                out.prices(t, static_cast<Eigen::Index>(d)) =
                    spec.initial_price[d] * std::pow(1.0 + spec.drift[d], static_cast<double>(t));
    } else {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t d = 0; d < n; ++d) out.prices(0, static_cast<Eigen::Index>(d)) = spec.initial_price[d];
        for (Eigen::Index t = 1; t < rows; ++t) {
            for (std::size_t d = 0; d < n; ++d) {
                const double vol = spec.volatility[d];
                const double log_step = std::log1p(spec.drift[d]) - 0.5 * vol * vol + vol * gauss(rng);
                out.prices(t, static_cast<Eigen::Index>(d)) = out.prices(t - 1, static_cast<Eigen::Index>(d)) * std::exp(log_step);
            }
        }
    }
    out.validate();
    return out;
}

Eigen::MatrixXd daily_returns(const PriceSeries& series) {
    const auto rows = series.prices.rows();
    if (rows < 2) throw config_error("daily returns need at least 2 dates");
    return (series.prices.bottomRows(rows - 1).array() / series.prices.topRows(rows - 1).array() - 1.0).matrix();
}

}  // namespace drltrade
