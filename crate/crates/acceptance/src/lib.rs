//! Holds the acceptance suite, `tests/acceptance.rs`. It lives in its own
//! package so that it runs after the unit and integration suites of the
//! library and the command-line tool.
