import lightgbm as lgb

params = {'objective': 'regression', 'learning_rate': 0.05, 'num_leaves': 31, 'metric': 'rmse'}
model = lgb.train(params, train_set)
