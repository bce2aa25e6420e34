//! Independent reference computations.

use chrono::NaiveDate;

fn leap(y: i32) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

fn month_len(y: i32, m: u32) -> u32 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ if leap(y) => 29,
        _ => 28,
    }
}

/// Date `days` after `epoch`, stepping whole months while they fit and
/// single days after that.
pub fn add_days(epoch: NaiveDate, days: u64) -> NaiveDate {
    use chrono::Datelike;
    let (mut y, mut m, mut d) = (epoch.year(), epoch.month(), epoch.day());
    let mut left = days;
    loop {
        let to_next_month = u64::from(month_len(y, m) - d + 1);
        if left < to_next_month {
            d += left as u32;
            break;
        }
        left -= to_next_month;
        d = 1;
        m += 1;
        if m > 12 {
            m = 1;
            y += 1;
        }
    }
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}
