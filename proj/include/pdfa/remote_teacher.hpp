#pragma once

#include <cerrno>
#include <csignal>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "pdfa/errors.hpp"
#include "pdfa/log.hpp"
#include "pdfa/teacher.hpp"

namespace pdfa {

/// Parsed wire response for one string_prob request. Kept as a free function
/// so malformed-line handling is testable without a subprocess.
inline double parse_string_prob_response(const std::string& line, std::uint64_t expect_id) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw TeacherError("malformed teacher response: " + line);
    }
    if (!doc.is_object()) throw TeacherError("teacher response is not an object: " + line);
    if (doc.contains("type") && doc["type"] == "error")
        throw TeacherError("teacher reported error: " + doc.value("message", std::string("<no message>")));
    if (!doc.contains("id") || !doc["id"].is_number_integer() || doc["id"].get<std::uint64_t>() != expect_id)
        throw TeacherError("teacher response id mismatch: " + line);
    if (!doc.contains("p") || !doc["p"].is_number())
        throw TeacherError("teacher response lacks a numeric \"p\": " + line);
    double p = doc["p"].get<double>();
    if (!(p >= 0.0) || !(p <= 1.0))
        throw TeacherError("teacher probability outside [0,1]: " + line);
    return p;
}

/// Teacher behind a child process speaking newline-delimited JSON over its
/// standard streams, one request in flight at a time:
///   -> {"type":"hello"}                            <- {"type":"hello","alphabet_size":N}
///   -> {"id":k,"type":"string_prob","tokens":[..]} <- {"id":k,"p":x}
class RemoteTeacher : public Teacher {
public:
    explicit RemoteTeacher(const std::string& command, double timeout_seconds = 30.0)
        : timeout_(timeout_seconds) {
        spawn(command);
        std::string reply = round_trip("{\"type\":\"hello\"}\n");
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(reply);
        } catch (const nlohmann::json::exception&) {
            throw TeacherError("malformed hello response: " + reply);
        }
        if (!doc.is_object() || doc.value("type", std::string()) != "hello" ||
            !doc.contains("alphabet_size") || !doc["alphabet_size"].is_number_integer())
            throw TeacherError("invalid hello response: " + reply);
        alphabet_ = doc["alphabet_size"].get<std::uint32_t>();
    }

    RemoteTeacher(const RemoteTeacher&) = delete;
    RemoteTeacher& operator=(const RemoteTeacher&) = delete;

    ~RemoteTeacher() override {
        if (to_child_ >= 0) ::close(to_child_);
        if (from_child_ >= 0) ::close(from_child_);
        if (pid_ > 0) {
            int status = 0;
            if (::waitpid(pid_, &status, WNOHANG) == 0) {
                ::kill(pid_, SIGTERM);
                ::waitpid(pid_, &status, 0);
            }
        }
    }

    double string_prob(const Word& x) override {
        std::uint64_t id = ++next_id_;
        std::string req = "{\"id\":" + std::to_string(id) + ",\"type\":\"string_prob\",\"tokens\":[";
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) req += ',';
            req += std::to_string(x[i]);
        }
        req += "]}\n";
        return parse_string_prob_response(round_trip(req), id);
    }

    std::uint32_t alphabet_size() const override { return alphabet_; }

private:
    void spawn(const std::string& command) {
        int to_pipe[2], from_pipe[2];
        if (::pipe(to_pipe) != 0 || ::pipe(from_pipe) != 0)
            throw TeacherError("failed to create pipes for teacher process");
        pid_ = ::fork();
        if (pid_ < 0) throw TeacherError("failed to fork teacher process");
        if (pid_ == 0) {
            ::dup2(to_pipe[0], STDIN_FILENO);
            ::dup2(from_pipe[1], STDOUT_FILENO);
            ::close(to_pipe[0]);
            ::close(to_pipe[1]);
            ::close(from_pipe[0]);
            ::close(from_pipe[1]);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(to_pipe[0]);
        ::close(from_pipe[1]);
        to_child_ = to_pipe[1];
        from_child_ = from_pipe[0];
        ::signal(SIGPIPE, SIG_IGN);
    }

    std::string round_trip(const std::string& request) {
        log_debug("teacher <- " + request.substr(0, request.size() - 1));
        const char* data = request.data();
        std::size_t left = request.size();
        while (left > 0) {
            ssize_t n = ::write(to_child_, data, left);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TeacherError(std::string("teacher pipe write failed: ") + std::strerror(errno));
            }
            data += n;
            left -= static_cast<std::size_t>(n);
        }
        // read one full line within the timeout
        while (true) {
            auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                log_debug("teacher -> " + line);
                return line;
            }
            struct pollfd pfd{from_child_, POLLIN, 0};
            int rv = ::poll(&pfd, 1, static_cast<int>(timeout_ * 1000.0));
            if (rv == 0) throw TeacherError("teacher response timed out");
            if (rv < 0) {
                if (errno == EINTR) continue;
                throw TeacherError(std::string("teacher pipe poll failed: ") + std::strerror(errno));
            }
            char chunk[4096];
            ssize_t n = ::read(from_child_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TeacherError(std::string("teacher pipe read failed: ") + std::strerror(errno));
            }
            if (n == 0) throw TeacherError("teacher process closed its output (broken pipe)");
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    double timeout_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::uint64_t next_id_ = 0;
    std::uint32_t alphabet_ = 0;
    std::string buffer_;
};

}  // namespace pdfa
