"""テストパッケージ"""
