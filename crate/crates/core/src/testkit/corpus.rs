//! Synthetic labeled corpora over the shipped method vocabulary.
//!
//! Each class is a mixture of subtypes; a subtype is a table of Poisson
//! rates per method key. Per sample, an overall size factor and a per-key
//! multiplier (both Gamma with mean 1) add heterogeneity.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use chrono::{Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::features::FeatureVector;
use crate::forest::{Label, LabeledDataset, Sample};
use crate::invoke::{package_of, InvokeKind, InvokeSite, MethodRef};
use crate::reference::{ApiReferenceList, Granularity};

/// The shipped vocabulary at `g`.
pub fn reference_list(g: Granularity) -> ApiReferenceList {
    crate::reference::bundled_list(g)
}

type Profile = &'static [(&'static str, f64)];

const BACKGROUND: Profile = &[
    ("java/lang/StringBuilder;-><init>", 18.0),
    ("java/lang/StringBuilder;->append", 36.0),
    ("java/lang/StringBuilder;->toString", 18.0),
    ("java/lang/String;->equals", 8.0),
    ("java/lang/String;->valueOf", 5.0),
    ("java/lang/String;->length", 4.0),
    ("java/lang/String;->substring", 2.0),
    ("java/lang/String;->format", 2.0),
    ("java/lang/Object;-><init>", 14.0),
    ("java/lang/Object;->getClass", 1.0),
    ("java/lang/Integer;->parseInt", 2.0),
    ("java/lang/Integer;->valueOf", 3.0),
    ("java/lang/System;->currentTimeMillis", 2.0),
    ("java/lang/Thread;-><init>", 1.0),
    ("java/lang/Thread;->start", 1.0),
    ("java/util/ArrayList;-><init>", 5.0),
    ("java/util/ArrayList;->add", 6.0),
    ("java/util/ArrayList;->get", 4.0),
    ("java/util/ArrayList;->size", 4.0),
    ("java/util/HashMap;-><init>", 3.0),
    ("java/util/HashMap;->put", 3.0),
    ("java/util/HashMap;->get", 3.0),
    ("java/util/Iterator;->hasNext", 4.0),
    ("java/util/Iterator;->next", 4.0),
    ("java/util/List;->size", 2.0),
    ("android/app/Activity;->onCreate", 2.0),
    ("android/app/Activity;->setContentView", 2.0),
    ("android/app/Activity;->findViewById", 5.0),
    ("android/app/Activity;->startActivity", 1.0),
    ("android/app/Activity;->finish", 1.0),
    ("android/app/Activity;->getSystemService", 1.0),
    ("android/content/Intent;-><init>", 3.0),
    ("android/content/Intent;->putExtra", 2.0),
    ("android/content/Context;->getSharedPreferences", 1.0),
    ("android/content/SharedPreferences;->getString", 2.0),
    ("android/content/SharedPreferences;->edit", 1.0),
    ("android/content/SharedPreferences$Editor;->putString", 1.0),
    ("android/content/SharedPreferences$Editor;->commit", 1.0),
    ("android/util/Log;->d", 5.0),
    ("android/util/Log;->e", 3.0),
    ("android/view/View;->setOnClickListener", 3.0),
    ("android/view/View;->setVisibility", 2.0),
    ("android/widget/TextView;->setText", 4.0),
    ("android/widget/Toast;->makeText", 1.0),
    ("android/widget/Toast;->show", 1.0),
    ("android/os/Handler;->post", 1.0),
    ("android/os/Bundle;->getString", 1.0),
    ("java/io/File;-><init>", 1.0),
    ("java/io/File;->exists", 1.0),
    ("java/io/InputStream;->read", 1.0),
    ("java/io/InputStream;->close", 1.0),
    ("java/io/BufferedReader;-><init>", 0.5),
    ("java/io/BufferedReader;->readLine", 0.5),
];

const TRUSTED_UI: Profile = &[
    ("android/app/Activity;->findViewById", 10.0),
    ("android/view/LayoutInflater;->inflate", 4.0),
    ("android/view/View;->setOnClickListener", 6.0),
    ("android/widget/TextView;->setText", 8.0),
    ("android/widget/ImageView;->setImageResource", 3.0),
    ("android/widget/ListView;->setAdapter", 1.0),
    ("android/widget/ArrayAdapter;-><init>", 1.0),
    ("android/app/AlertDialog$Builder;-><init>", 1.5),
    ("android/app/AlertDialog$Builder;->setTitle", 1.5),
    ("android/app/AlertDialog$Builder;->setMessage", 1.5),
    ("android/app/AlertDialog$Builder;->show", 1.5),
    ("android/app/Notification$Builder;->build", 0.5),
    ("android/app/NotificationManager;->notify", 0.5),
    ("android/database/sqlite/SQLiteOpenHelper;->getWritableDatabase", 1.0),
    ("android/database/sqlite/SQLiteDatabase;->query", 1.5),
    ("android/database/Cursor;->moveToNext", 2.0),
    ("android/database/Cursor;->getString", 3.0),
    ("android/database/Cursor;->close", 1.5),
    ("java/net/URL;-><init>", 1.0),
    ("java/net/URL;->openConnection", 1.0),
    ("java/net/HttpURLConnection;->getInputStream", 1.0),
    ("java/net/HttpURLConnection;->getResponseCode", 1.0),
    ("org/json/JSONObject;-><init>", 3.0),
    ("org/json/JSONObject;->getString", 5.0),
    ("org/json/JSONObject;->put", 2.0),
    ("org/json/JSONArray;->getJSONObject", 2.0),
    ("android/webkit/WebView;->loadUrl", 0.5),
    ("android/webkit/WebView;->getSettings", 0.5),
    ("android/net/ConnectivityManager;->getActiveNetworkInfo", 1.0),
    ("android/net/NetworkInfo;->isConnected", 1.0),
    ("android/location/LocationManager;->getLastKnownLocation", 0.3),
    ("java/util/Locale;->getDefault", 1.0),
    ("android/content/res/Resources;->getString", 3.0),
];

const TRUSTED_FILES: Profile = &[
    ("java/io/File;-><init>", 4.0),
    ("java/io/File;->exists", 3.0),
    ("java/io/File;->isDirectory", 1.5),
    ("java/io/File;->getName", 2.0),
    ("java/io/File;->length", 1.0),
    ("java/io/File;->mkdirs", 0.5),
    ("java/io/File;->listFiles", 0.8),
    ("java/io/File;->getAbsolutePath", 1.0),
    ("java/io/File;->delete", 0.3),
    ("java/io/FileInputStream;-><init>", 1.0),
    ("java/io/FileInputStream;->read", 1.0),
    ("java/io/FileInputStream;->close", 1.0),
    ("java/io/FileOutputStream;-><init>", 0.8),
    ("java/io/FileOutputStream;->write", 0.8),
    ("java/io/FileOutputStream;->close", 0.8),
    ("android/os/Environment;->getExternalStorageDirectory", 0.4),
    ("android/os/Environment;->getExternalStorageState", 0.6),
    ("java/security/MessageDigest;->getInstance", 1.0),
    ("java/security/MessageDigest;->digest", 1.0),
    ("javax/crypto/Cipher;->getInstance", 0.4),
    ("javax/crypto/Cipher;->init", 0.4),
    ("javax/crypto/Cipher;->doFinal", 0.4),
    ("javax/crypto/spec/SecretKeySpec;-><init>", 0.4),
    ("android/util/Base64;->encodeToString", 1.0),
    ("android/util/Base64;->decode", 0.5),
    ("java/util/zip/ZipFile;-><init>", 0.3),
    ("dalvik/system/DexClassLoader;-><init>", 0.03),
];

const TRUSTED_GAME: Profile = &[
    ("android/graphics/Canvas;->drawBitmap", 6.0),
    ("android/graphics/Canvas;->drawText", 3.0),
    ("android/graphics/Paint;-><init>", 3.0),
    ("android/graphics/Paint;->setColor", 3.0),
    ("android/graphics/Bitmap;->createBitmap", 2.0),
    ("android/graphics/BitmapFactory;->decodeResource", 3.0),
    ("android/media/MediaPlayer;->create", 1.0),
    ("android/media/MediaPlayer;->start", 1.0),
    ("android/view/View;->invalidate", 3.0),
    ("java/util/Random;->nextInt", 5.0),
    ("android/os/Handler;->postDelayed", 2.0),
    ("android/os/Vibrator;->vibrate", 0.5),
    ("android/os/PowerManager;->newWakeLock", 0.3),
    ("android/os/PowerManager$WakeLock;->acquire", 0.3),
    ("java/lang/System;->loadLibrary", 0.5),
];

const MALWARE_SMS: Profile = &[
    ("android/telephony/SmsManager;->getDefault", 2.0),
    ("android/telephony/SmsManager;->sendTextMessage", 3.0),
    ("android/telephony/SmsMessage;->createFromPdu", 1.0),
    ("android/telephony/SmsMessage;->getMessageBody", 1.0),
    ("android/telephony/TelephonyManager;->getDeviceId", 2.0),
    ("android/telephony/TelephonyManager;->getSubscriberId", 1.0),
    ("android/telephony/TelephonyManager;->getLine1Number", 1.0),
    ("android/telephony/TelephonyManager;->getSimOperator", 1.0),
    ("android/app/PendingIntent;->getBroadcast", 1.0),
    ("android/content/Context;->registerReceiver", 1.0),
    ("org/apache/http/impl/client/DefaultHttpClient;-><init>", 1.0),
    ("org/apache/http/impl/client/DefaultHttpClient;->execute", 1.0),
    ("org/apache/http/client/methods/HttpPost;-><init>", 1.0),
];

const MALWARE_SPY: Profile = &[
    ("android/content/Context;->getContentResolver", 2.0),
    ("android/content/ContentResolver;->query", 3.0),
    ("android/database/Cursor;->moveToNext", 4.0),
    ("android/database/Cursor;->getString", 6.0),
    ("android/database/Cursor;->close", 2.0),
    ("android/location/LocationManager;->requestLocationUpdates", 1.0),
    ("android/location/Location;->getLatitude", 1.0),
    ("android/location/Location;->getLongitude", 1.0),
    ("android/provider/Settings$Secure;->getString", 1.0),
    ("android/content/pm/PackageManager;->getInstalledPackages", 1.0),
    ("android/content/pm/PackageManager;->getInstalledApplications", 0.5),
    ("java/net/URL;-><init>", 2.0),
    ("java/net/URL;->openConnection", 2.0),
    ("java/net/HttpURLConnection;->setRequestMethod", 1.0),
    ("java/net/HttpURLConnection;->connect", 1.0),
    ("org/json/JSONObject;-><init>", 3.0),
    ("org/json/JSONObject;->put", 5.0),
    ("org/json/JSONObject;->toString", 2.0),
    ("android/util/Base64;->encodeToString", 2.0),
    ("android/telephony/TelephonyManager;->getDeviceId", 2.0),
    ("android/telephony/TelephonyManager;->getNetworkOperatorName", 1.0),
    ("android/net/wifi/WifiManager;->getConnectionInfo", 0.5),
];

const MALWARE_DROPPER: Profile = &[
    ("dalvik/system/DexClassLoader;-><init>", 1.0),
    ("dalvik/system/DexClassLoader;->loadClass", 1.0),
    ("java/lang/ClassLoader;->loadClass", 1.5),
    ("android/content/Context;->getClassLoader", 1.0),
    ("android/content/Context;->getDir", 1.0),
    ("android/content/Context;->getAssets", 1.0),
    ("android/content/res/AssetManager;->open", 1.0),
    ("java/lang/Class;->forName", 3.0),
    ("java/lang/Class;->getMethod", 2.0),
    ("java/lang/Class;->getDeclaredMethod", 1.0),
    ("java/lang/reflect/Method;->invoke", 3.0),
    ("java/lang/reflect/Field;->setAccessible", 1.0),
    ("java/lang/Runtime;->getRuntime", 1.0),
    ("java/lang/Runtime;->exec", 1.0),
    ("java/util/zip/ZipInputStream;->getNextEntry", 0.5),
    ("java/io/FileOutputStream;-><init>", 1.0),
    ("java/io/FileOutputStream;->write", 2.0),
    ("java/io/FileOutputStream;->close", 1.0),
    ("java/io/File;->delete", 0.5),
    ("javax/crypto/Cipher;->getInstance", 0.5),
    ("javax/crypto/Cipher;->init", 0.5),
    ("javax/crypto/Cipher;->doFinal", 0.5),
    ("javax/crypto/spec/SecretKeySpec;-><init>", 0.5),
];

const MALWARE_COMMON: Profile = &[
    ("android/app/Service;->onStartCommand", 1.0),
    ("android/app/AlarmManager;->setRepeating", 0.7),
    ("android/content/Context;->startService", 1.0),
    ("android/content/pm/PackageManager;->setComponentEnabledSetting", 0.6),
    ("android/content/ComponentName;-><init>", 0.8),
    ("android/content/Context;->getPackageManager", 1.0),
];

const RANSOM_LOCKER: Profile = &[
    ("android/app/admin/DevicePolicyManager;->lockNow", 2.0),
    ("android/app/admin/DevicePolicyManager;->resetPassword", 1.0),
    ("android/app/admin/DevicePolicyManager;->isAdminActive", 2.0),
    ("android/app/admin/DevicePolicyManager;->setPasswordQuality", 0.5),
    ("android/app/admin/DevicePolicyManager;->setMaximumTimeToLock", 0.3),
    ("android/app/admin/DeviceAdminReceiver;->onEnabled", 1.0),
    ("android/app/admin/DeviceAdminReceiver;->onDisableRequested", 1.0),
    ("android/view/WindowManager;->addView", 2.0),
    ("android/view/WindowManager$LayoutParams;-><init>", 2.0),
    ("android/view/Window;->addFlags", 2.0),
    ("android/view/Window;->setFlags", 1.0),
    ("android/app/Activity;->getWindow", 2.0),
    ("android/app/Activity;->onBackPressed", 2.0),
    ("android/app/KeyguardManager;->newKeyguardLock", 1.0),
    ("android/app/KeyguardManager$KeyguardLock;->disableKeyguard", 1.0),
    ("android/app/ActivityManager;->getRunningTasks", 1.0),
    ("android/app/ActivityManager;->killBackgroundProcesses", 0.5),
    ("android/app/Service;->startForeground", 1.0),
    ("android/view/View;->setBackgroundColor", 1.0),
    ("android/widget/EditText;->getText", 2.0),
    ("android/media/AudioManager;->setStreamVolume", 0.5),
    ("android/content/Intent;->addFlags", 2.0),
    ("android/content/Intent;->setFlags", 1.0),
];

const RANSOM_CRYPTO: Profile = &[
    ("java/io/File;->listFiles", 4.0),
    ("java/io/File;->isDirectory", 3.0),
    ("java/io/File;->getAbsolutePath", 3.0),
    ("java/io/File;->getName", 2.0),
    ("java/io/File;->delete", 3.0),
    ("java/io/File;->renameTo", 2.0),
    ("java/io/File;->length", 1.0),
    ("android/os/Environment;->getExternalStorageDirectory", 2.0),
    ("java/io/FileInputStream;-><init>", 2.0),
    ("java/io/FileInputStream;->read", 3.0),
    ("java/io/FileInputStream;->close", 2.0),
    ("java/io/FileOutputStream;-><init>", 2.0),
    ("java/io/FileOutputStream;->write", 3.0),
    ("java/io/FileOutputStream;->flush", 1.0),
    ("java/io/FileOutputStream;->close", 2.0),
    ("java/io/RandomAccessFile;-><init>", 0.5),
    ("java/io/RandomAccessFile;->write", 0.5),
    ("javax/crypto/Cipher;->getInstance", 2.0),
    ("javax/crypto/Cipher;->init", 2.0),
    ("javax/crypto/Cipher;->update", 1.0),
    ("javax/crypto/Cipher;->doFinal", 1.0),
    ("javax/crypto/CipherOutputStream;-><init>", 1.0),
    ("javax/crypto/CipherOutputStream;->write", 1.0),
    ("javax/crypto/CipherOutputStream;->flush", 1.0),
    ("javax/crypto/CipherOutputStream;->close", 1.0),
    ("javax/crypto/spec/SecretKeySpec;-><init>", 2.0),
    ("javax/crypto/spec/IvParameterSpec;-><init>", 1.0),
    ("javax/crypto/KeyGenerator;->getInstance", 0.5),
    ("javax/crypto/KeyGenerator;->generateKey", 0.5),
    ("java/security/SecureRandom;->nextBytes", 0.5),
    ("java/lang/String;->endsWith", 3.0),
    ("java/lang/String;->contains", 2.0),
    ("android/telephony/TelephonyManager;->getDeviceId", 1.0),
    ("java/net/HttpURLConnection;->getInputStream", 0.5),
    ("org/json/JSONObject;->put", 1.0),
];

/// Subtypes per class as (weight, profile, scale).
fn subtypes(label: Label) -> &'static [(f64, Profile, f64)] {
    match label {
        Label::Trusted => &[(0.45, TRUSTED_UI, 1.0), (0.3, TRUSTED_FILES, 1.0), (0.25, TRUSTED_GAME, 1.0)],
        Label::GenericMalware => &[(0.35, MALWARE_SMS, 1.0), (0.35, MALWARE_SPY, 1.0), (0.3, MALWARE_DROPPER, 1.0)],
        Label::Ransomware => &[(0.4, RANSOM_LOCKER, 1.0), (0.4, RANSOM_CRYPTO, 1.0), (0.2, RANSOM_LOCKER, 0.5)],
    }
}

/// Extra profile mixed into every sample of a class.
fn class_extra(label: Label, subtype: usize) -> Option<(Profile, f64)> {
    match (label, subtype) {
        (Label::GenericMalware, _) => Some((MALWARE_COMMON, 1.0)),
        // The third ransomware subtype is hybrid: half locker, half crypto.
        (Label::Ransomware, 2) => Some((RANSOM_CRYPTO, 0.5)),
        _ => None,
    }
}

/// One synthetic application: counts per method-vocabulary index plus a
/// number of calls into its own (non-System) code.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticApp {
    pub id: String,
    pub label: Label,
    pub first_seen: NaiveDate,
    /// (index into the method vocabulary, count), ascending, counts > 0.
    pub counts: Vec<(usize, u32)>,
    pub user_calls: u32,
}

#[derive(Debug, Clone)]
pub struct CorpusConfig {
    pub per_class: usize,
    pub seed: u64,
    pub first_seen_from: NaiveDate,
    pub first_seen_to: NaiveDate,
    pub id_prefix: String,
}

impl CorpusConfig {
    pub fn new(per_class: usize, seed: u64) -> Self {
        CorpusConfig {
            per_class,
            seed,
            first_seen_from: NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(),
            first_seen_to: NaiveDate::from_ymd_opt(2016, 12, 31).unwrap(),
            id_prefix: "syn".into(),
        }
    }
}

pub struct Generator {
    vocab: ApiReferenceList,
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator {
            vocab: reference_list(Granularity::Method),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn rates(&self, profile: Profile, scale: f64, into: &mut [f64]) {
        for (key, rate) in profile {
            let i = self.vocab.index(key).unwrap_or_else(|| panic!("profile key {key} not in vocabulary"));
            into[i] += rate * scale;
        }
    }

    /// Expected counts for a subtype of `label`.
    fn subtype_rates(&self, label: Label, subtype: usize) -> Vec<f64> {
        let mut r = vec![0.0; self.vocab.len()];
        self.rates(BACKGROUND, 1.0, &mut r);
        let (_, profile, scale) = subtypes(label)[subtype];
        self.rates(profile, scale, &mut r);
        if let Some((extra, s)) = class_extra(label, subtype) {
            self.rates(extra, s, &mut r);
        }
        r
    }

    fn draw(&mut self, rates: &[f64]) -> Vec<(usize, u32)> {
        let size = Gamma::new(4.0, 0.25).unwrap().sample(&mut self.rng);
        let jitter = Gamma::new(2.0, 0.5).unwrap();
        let mut out = Vec::new();
        for (i, &r) in rates.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let lambda = r * size * jitter.sample(&mut self.rng);
            if lambda <= 0.0 {
                continue;
            }
            let c = Poisson::new(lambda).unwrap().sample(&mut self.rng) as u32;
            if c > 0 {
                out.push((i, c));
            }
        }
        out
    }

    fn date(&mut self, from: NaiveDate, to: NaiveDate) -> NaiveDate {
        let span = (to - from).num_days().max(0);
        from + Duration::days(self.rng.random_range(0..=span))
    }

    fn sample(&mut self, label: Label) -> (Vec<(usize, u32)>, u32) {
        let weights: Vec<f64> = subtypes(label).iter().map(|s| s.0).collect();
        let subtype = WeightedIndex::new(&weights).unwrap().sample(&mut self.rng);
        let rates = self.subtype_rates(label, subtype);
        let counts = self.draw(&rates);
        let user_calls = self.rng.random_range(10..200);
        (counts, user_calls)
    }

    pub fn generate(&mut self, cfg: &CorpusConfig) -> Vec<SyntheticApp> {
        let mut apps = Vec::new();
        for label in Label::ALL {
            for i in 0..cfg.per_class {
                let (counts, user_calls) = self.sample(label);
                apps.push(SyntheticApp {
                    id: format!("{}-{}-{i:04}", cfg.id_prefix, label.token()),
                    label,
                    first_seen: self.date(cfg.first_seen_from, cfg.first_seen_to),
                    counts,
                    user_calls,
                });
            }
        }
        apps
    }

    /// Ransomware whose package-level totals are those of a fresh trusted
    /// sample, with the calls inside each package re-drawn from the
    /// ransomware within-package method distribution. Packages ransomware
    /// never calls keep the trusted methods.
    pub fn drifted_ransomware(&mut self, n: usize, from: NaiveDate, to: NaiveDate, id_prefix: &str) -> Vec<SyntheticApp> {
        let n_sub = subtypes(Label::Ransomware).len();
        let mut ransom = vec![0.0; self.vocab.len()];
        for s in 0..n_sub {
            let w = subtypes(Label::Ransomware)[s].0;
            for (acc, r) in ransom.iter_mut().zip(self.subtype_rates(Label::Ransomware, s)) {
                *acc += w * r;
            }
        }
        let package_of_key: Vec<String> = self
            .vocab
            .entries()
            .iter()
            .map(|k| package_of(k.split_once(";->").unwrap().0).to_string())
            .collect();
        let mut by_package: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, p) in package_of_key.iter().enumerate() {
            by_package.entry(p.as_str()).or_default().push(i);
        }
        // Within-package ransomware distribution, ignoring the shared
        // background so the redistribution targets what sets ransomware apart.
        let mut background = vec![0.0; self.vocab.len()];
        self.rates(BACKGROUND, 1.0, &mut background);
        let distinct: Vec<f64> = ransom.iter().zip(&background).map(|(r, b)| (r - b).max(0.0)).collect();
        let samplers: BTreeMap<&str, (Vec<usize>, WeightedIndex<f64>)> = by_package
            .iter()
            .filter_map(|(p, idx)| {
                let w: Vec<f64> = idx.iter().map(|&i| distinct[i]).collect();
                WeightedIndex::new(&w).ok().map(|d| (*p, (idx.clone(), d)))
            })
            .collect();

        (0..n)
            .map(|i| {
                let (trusted, user_calls) = self.sample(Label::Trusted);
                let mut totals: BTreeMap<&str, u32> = BTreeMap::new();
                let mut kept: BTreeMap<usize, u32> = BTreeMap::new();
                for &(k, c) in &trusted {
                    let p = package_of_key[k].as_str();
                    if samplers.contains_key(p) {
                        *totals.entry(p).or_default() += c;
                    } else {
                        kept.insert(k, c);
                    }
                }
                for (p, total) in totals {
                    let (idx, dist) = &samplers[p];
                    for _ in 0..total {
                        *kept.entry(idx[dist.sample(&mut self.rng)]).or_default() += 1;
                    }
                }
                SyntheticApp {
                    id: format!("{id_prefix}-{i:04}"),
                    label: Label::Ransomware,
                    first_seen: self.date(from, to),
                    counts: kept.into_iter().collect(),
                    user_calls,
                }
            })
            .collect()
    }
}

fn vocab() -> &'static ApiReferenceList {
    static VOCAB: OnceLock<ApiReferenceList> = OnceLock::new();
    VOCAB.get_or_init(|| reference_list(Granularity::Method))
}

/// Method-vocabulary keys, for turning counts back into call sites.
fn method_ref(key: &str) -> MethodRef {
    let (class, name) = key.split_once(";->").expect("method key");
    MethodRef::new(class, name, "()V")
}

impl SyntheticApp {
    /// Call sites realizing the counts, plus the app's internal calls.
    pub fn invokes(&self) -> Vec<InvokeSite> {
        let vocab = vocab();
        let app = format!("com/{}/app", self.id.replace(['-', '.'], "_"));
        let mut out = Vec::new();
        for &(k, c) in &self.counts {
            let target = method_ref(&vocab.entries()[k]);
            let kind = if target.name == "<init>" {
                InvokeKind::Direct
            } else {
                InvokeKind::Virtual
            };
            for j in 0..c {
                out.push(InvokeSite::new(kind, format!("{app}/C{}", (k + j as usize) % 4), target.clone()));
            }
        }
        for j in 0..self.user_calls {
            out.push(InvokeSite::new(
                InvokeKind::Virtual,
                format!("{app}/C{}", j % 4),
                MethodRef::new(format!("{app}/Helper"), "run", "()V"),
            ));
        }
        out
    }

    /// Feature vector at `list` without materializing call sites.
    pub fn features(&self, list: &ApiReferenceList) -> FeatureVector {
        let vocab = vocab();
        let mut fv = FeatureVector::zeros(list);
        for &(k, c) in &self.counts {
            if let Some(i) = list.lookup(&method_ref(&vocab.entries()[k])) {
                fv.counts[i] = fv.counts[i].saturating_add(c);
            }
        }
        fv
    }
}

/// Label and featurize a corpus.
pub fn dataset(apps: &[SyntheticApp], list: &ApiReferenceList) -> LabeledDataset {
    let samples = apps
        .iter()
        .map(|a| Sample {
            id: a.id.clone(),
            features: a.features(list),
            label: a.label,
            first_seen: a.first_seen,
        })
        .collect();
    LabeledDataset::new(list.fingerprint(), list.len(), samples).expect("synthetic ids are unique")
}

/// A standard corpus: `per_class` samples of each class, seeded.
pub fn corpus(per_class: usize, seed: u64) -> Vec<SyntheticApp> {
    Generator::new(seed).generate(&CorpusConfig::new(per_class, seed))
}
