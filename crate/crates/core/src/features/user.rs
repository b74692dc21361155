use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::corpus::{url_pattern, UserProfile};

/// The 19 author-profile features, in serialization order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UserFeatures {
    pub chars_in_desc: u64,
    pub chars_in_real_name: u64,
    pub chars_in_user_handle: u64,
    pub num_matches: u64,
    pub total_urls_in_desc: u64,
    pub official_url_exists: bool,
    pub followers_count: u64,
    pub friends_count: u64,
    pub listed_count: u64,
    pub favourites_count: u64,
    pub geo_enabled: bool,
    /// Whole days between account creation and the reference time.
    pub acc_life: u64,
    pub verified: bool,
    pub num_tweet: u64,
    pub protected: bool,
    /// Tweets per day of account life.
    pub posting_frequency: f64,
    /// Whole days since the latest tweet.
    pub activity: u64,
    pub avg_likes_per_tweet: f64,
    pub follower_friends_ratio: f64,
}

impl UserFeatures {
    pub const NAMES: [&'static str; 19] = [
        "chars_in_desc",
        "chars_in_real_name",
        "chars_in_user_handle",
        "num_matches",
        "total_urls_in_desc",
        "official_url_exists",
        "followers_count",
        "friends_count",
        "listed_count",
        "favourites_count",
        "geo_enabled",
        "acc_life",
        "verified",
        "num_tweet",
        "protected",
        "posting_frequency",
        "activity",
        "avg_likes_per_tweet",
        "follower_friends_ratio",
    ];

    pub fn values(&self) -> [f64; 19] {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        [
            self.chars_in_desc as f64,
            self.chars_in_real_name as f64,
            self.chars_in_user_handle as f64,
            self.num_matches as f64,
            self.total_urls_in_desc as f64,
            b(self.official_url_exists),
            self.followers_count as f64,
            self.friends_count as f64,
            self.listed_count as f64,
            self.favourites_count as f64,
            b(self.geo_enabled),
            self.acc_life as f64,
            b(self.verified),
            self.num_tweet as f64,
            b(self.protected),
            self.posting_frequency,
            self.activity as f64,
            self.avg_likes_per_tweet,
            self.follower_friends_ratio,
        ]
    }
}

/// Size of the multiset intersection of the lowercased alphanumeric
/// characters of two strings.
pub fn num_matches(a: &str, b: &str) -> u64 {
    let mut counts: HashMap<char, u64> = HashMap::new();
    for c in a.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase) {
        *counts.entry(c).or_insert(0) += 1;
    }
    let mut matches = 0;
    for c in b.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase) {
        if let Some(n) = counts.get_mut(&c) {
            if *n > 0 {
                *n -= 1;
                matches += 1;
            }
        }
    }
    matches
}

fn whole_days(from: DateTime<Utc>, to: DateTime<Utc>) -> u64 {
    (to - from).num_days().max(0) as u64
}

/// Profile features relative to the reference time `as_of`.
///
/// A latest-tweet time after `as_of` yields `activity = 0`.
pub fn extract_user_features(p: &UserProfile, as_of: DateTime<Utc>) -> Result<UserFeatures, FeatureError> {
    if as_of < p.created_at {
        return Err(FeatureError::AsOfBeforeCreation {
            as_of: as_of.to_rfc3339(),
            created_at: p.created_at.to_rfc3339(),
        });
    }
    let acc_life = whole_days(p.created_at, as_of);
    let num_tweet = p.statuses_count;
    Ok(UserFeatures {
        chars_in_desc: p.description.chars().count() as u64,
        chars_in_real_name: p.real_name.chars().count() as u64,
        chars_in_user_handle: p.handle.chars().count() as u64,
        num_matches: num_matches(&p.real_name, &p.handle),
        total_urls_in_desc: url_pattern().find_iter(&p.description).count() as u64,
        official_url_exists: p.official_url.as_deref().is_some_and(|u| !u.trim().is_empty()),
        followers_count: p.followers_count,
        friends_count: p.friends_count,
        listed_count: p.listed_count,
        favourites_count: p.favourites_count,
        geo_enabled: p.geo_enabled,
        acc_life,
        verified: p.verified,
        num_tweet,
        protected: p.protected,
        posting_frequency: num_tweet as f64 / acc_life.max(1) as f64,
        activity: p.latest_tweet_at.map_or(acc_life, |t| whole_days(t, as_of)),
        avg_likes_per_tweet: p.favourites_count as f64 / num_tweet.max(1) as f64,
        follower_friends_ratio: p.followers_count as f64 / p.friends_count.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn ts(y: i32, m: u32, d: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
    }

    fn profile() -> UserProfile {
        UserProfile {
            handle: "amarazad".into(),
            real_name: "Amar Azad".into(),
            description: "News at https://a.example and www.b.example".into(),
            official_url: Some("https://amar.example".into()),
            followers_count: 1000,
            friends_count: 0,
            listed_count: 4,
            favourites_count: 1460,
            statuses_count: 730,
            geo_enabled: true,
            verified: false,
            protected: false,
            created_at: ts(2019, 1, 1),
            latest_tweet_at: Some(ts(2019, 12, 22)),
        }
    }

    #[test]
    fn golden_values() {
        let f = extract_user_features(&profile(), ts(2020, 1, 1)).unwrap();
        assert_eq!(f.num_matches, 8);
        assert_eq!(f.acc_life, 365);
        assert_eq!(f.posting_frequency, 2.0);
        assert_eq!(f.follower_friends_ratio, 1000.0);
        assert_eq!(f.avg_likes_per_tweet, 2.0);
        assert_eq!(f.activity, 10);
        assert_eq!(f.total_urls_in_desc, 2);
        assert!(f.official_url_exists);
        assert_eq!(f.chars_in_real_name, 9);
        assert_eq!(f.chars_in_user_handle, 8);
        assert_eq!(f.values().len(), 19);
    }

    #[test]
    fn division_guards_and_missing_latest() {
        let mut p = profile();
        p.statuses_count = 0;
        p.latest_tweet_at = None;
        p.official_url = Some("  ".into());
        let f = extract_user_features(&p, ts(2019, 1, 1)).unwrap();
        assert_eq!(f.acc_life, 0);
        assert_eq!(f.posting_frequency, 0.0);
        assert_eq!(f.avg_likes_per_tweet, 1460.0);
        assert_eq!(f.activity, 0);
        assert!(!f.official_url_exists);
    }

    #[test]
    fn as_of_before_creation_fails() {
        assert!(matches!(
            extract_user_features(&profile(), ts(2018, 6, 1)),
            Err(FeatureError::AsOfBeforeCreation { .. })
        ));
    }

    #[test]
    fn num_matches_definition() {
        assert_eq!(num_matches("Amar Azad", "amarazad"), 8);
        assert_eq!(num_matches("", "abc"), 0);
        assert_eq!(num_matches("aab", "ab"), 2);
        assert_eq!(num_matches("A_B-1", "ab1!!"), 3);
        assert_eq!(num_matches("अमर", "अमर"), 3);
    }

    #[test]
    fn names_are_in_serialization_order() {
        let json = serde_json::to_value(UserFeatures::default()).unwrap();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        // serde_json's map is sorted unless preserve_order is enabled; compare sets.
        assert_eq!(keys.len(), 19);
        for name in UserFeatures::NAMES {
            assert!(json.get(name).is_some(), "{name}");
        }
    }

    proptest! {
        #[test]
        fn always_finite(
            followers in any::<u64>(), friends in any::<u64>(), favs in any::<u64>(),
            statuses in any::<u64>(), days in 0i64..20_000, handle in "\\PC{0,15}", name in "\\PC{0,15}",
        ) {
            let mut p = profile();
            p.followers_count = followers;
            p.friends_count = friends;
            p.favourites_count = favs;
            p.statuses_count = statuses;
            p.handle = handle;
            p.real_name = name;
            p.latest_tweet_at = None;
            let as_of = p.created_at + chrono::Duration::days(days);
            let f = extract_user_features(&p, as_of).unwrap();
            prop_assert!(f.values().iter().all(|v| v.is_finite()));
            prop_assert_eq!(f.acc_life, days as u64);
        }
    }
}
